#include <iostream>

#include "fdclass/cli.hpp"

int main(int argc, char** argv) { return fdc::run_cli(argc, argv, std::cout, std::cerr); }
