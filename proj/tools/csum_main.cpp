#include "csum/cli.hpp"

int main(int argc, char** argv) { return csum::run_cli(argc, argv); }
