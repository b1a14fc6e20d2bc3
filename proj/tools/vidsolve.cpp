// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#include <vidsolve/cli.hpp>

int main(int argc, char** argv) { return vidsolve::cli::run(argc, argv); }
