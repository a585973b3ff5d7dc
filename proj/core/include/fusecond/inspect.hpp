#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fusecond {

struct InspectCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct InspectReport {
    std::string text;  // structured report, one "key=value" per line under [section] headers
    std::vector<InspectCheck> checks;
    std::vector<std::string> missing;  // artifacts that were expected but absent

    bool all_passed() const;
    const InspectCheck* find(const std::string& name) const;
};

// Reads an artifacts directory written by write_artifacts and re-derives the
// per-source summaries plus invariant spot checks (softmax row sums, score
// recomputation, coverage/complement law, enhancement identity cells).
InspectReport inspect(const std::filesystem::path& dir);

}  // namespace fusecond
