#include "sage/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sage::cli::run(argc, argv, std::cout, std::cerr); }
