#include "parceldelin/cli/cli.hpp"

int main(int argc, char** argv) { return parceldelin::cli::run(argc, argv); }
