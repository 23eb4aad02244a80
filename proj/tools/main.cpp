#include "app.hpp"

int main(int argc, char** argv) { return hcorr::app::run_cli(argc, argv); }
