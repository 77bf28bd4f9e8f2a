#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mgsched/model/grid_model.hpp"

namespace mgsched {

/// Reads and validates a case file. Throws CaseError: Kind::Io when the file
/// cannot be read, Kind::Parse for malformed documents, Kind::Validation with
/// every violated invariant otherwise.
GridModel load_case(const std::filesystem::path& path);

/// Same as load_case for an in-memory document.
GridModel parse_case(const std::string& text);

std::string dump_case(const GridModel& model);
void save_case(const GridModel& model, const std::filesystem::path& path);

/// Returns every invariant violation of an already-built model (empty when valid).
std::vector<CaseIssue> validate_model(const GridModel& model);

}  // namespace mgsched
