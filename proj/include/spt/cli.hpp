// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spt {

// Subcommands: features, pretrain, extract, probe, gradcheck, selftest.
// Exit code 0 on success, 1 on validation/usage errors, 2 on runtime faults.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spt
