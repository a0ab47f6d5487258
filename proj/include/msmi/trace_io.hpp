#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msmi/engine.hpp"

namespace msmi {

/// One "trace_v1" JSON line, without trailing newline.
std::string trace_to_json_line(const RefinementResult& result);

RefinementResult trace_from_json_line(const std::string& line, std::size_t line_no = 0);

/// One JSON line per result, in order.
void write_traces(const std::filesystem::path& path,
                  const std::vector<RefinementResult>& results);

/// Rejects lines whose schema field is not "trace_v1".
std::vector<RefinementResult> read_traces(const std::filesystem::path& path);

}  // namespace msmi
