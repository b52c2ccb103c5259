#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return reload::run_cli(argc, argv, std::cout, std::cerr); }
