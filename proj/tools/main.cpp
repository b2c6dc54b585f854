#include <iostream>

#include "arcus/cli.hpp"

int main(int argc, char** argv) {
    return arcus::cli_main(argc, argv, std::cout, std::cerr);
}
