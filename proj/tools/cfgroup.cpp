#include "cfgroup/cli.hpp"

int main(int argc, char** argv) { return cfgroup::run_cli(argc, argv); }
