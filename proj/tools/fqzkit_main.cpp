#include "fqzkit/cli.hpp"

int main(int argc, char** argv) {
    return fqzkit::cli_main(argc, argv);
}
