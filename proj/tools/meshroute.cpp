#include "meshmetrics/cli.hpp"

int main(int argc, char** argv) { return meshmetrics::run_cli(argc, argv); }
