#include "dirt/cli.hpp"

int main(int argc, char** argv) { return dirt::run_cli(argc, argv); }
