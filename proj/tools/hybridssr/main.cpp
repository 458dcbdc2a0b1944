#include <iostream>

#include "hybridssr/cli.hpp"

int main(int argc, char** argv) {
    return hybridssr::run_cli(argc, argv, std::cout, std::cerr);
}
