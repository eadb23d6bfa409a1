#include "freeburgers/cli.hpp"

int main(int argc, char** argv) { return freeburgers::run_cli(argc, argv); }
