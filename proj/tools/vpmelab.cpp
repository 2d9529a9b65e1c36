#include "vpme/cli.hpp"

int main(int argc, char** argv) { return vpme::run_cli(argc, argv); }
