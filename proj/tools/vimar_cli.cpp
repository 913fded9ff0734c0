#include <iostream>

#include "vimar/cli.hpp"

int main(int argc, char** argv) { return vimar::run_cli(argc, argv, std::cout, std::cerr); }
