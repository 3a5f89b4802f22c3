// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpg/cli.hpp"

int main(int argc, char** argv) { return mpg::cli::cli_main(argc, argv); }
