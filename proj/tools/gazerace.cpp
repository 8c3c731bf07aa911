#include <iostream>

#include "gazerace/cli.hpp"

int main(int argc, char** argv) { return gazerace::run_cli(argc, argv, std::cout, std::cerr); }
