#include <iostream>

#include "dtest/cli.hpp"

int main(int argc, char** argv) { return dtest::cli::run(argc, argv, std::cout, std::cerr); }
