#pragma once

#include "config.hpp"

namespace maxfun::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kVerification = 3 };

json pool_defaults();
json csc_verify_defaults();
json classify_defaults();
json selftest_defaults();

// Each command validates the whole configuration before doing any work and
// throws InvalidArgument / FormatError for bad input.
int cmd_pool(const json& cfg);
int cmd_csc_verify(const json& cfg);
int cmd_classify(const json& cfg);
int cmd_selftest(const json& cfg);

}  // namespace maxfun::cli
