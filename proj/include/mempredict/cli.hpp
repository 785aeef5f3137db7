#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mempredict {

/// Exit codes shared by every verb.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitStoreUnreadable = 3;
inline constexpr int kExitTooShort = 4;
inline constexpr int kExitData = 5;

/// Names the model store `predict` reads when --models is absent.
inline constexpr const char* kModelsEnvVar = "LSPREDICT_MODELS";

/// Entry point of the lspredict tool; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mempredict
