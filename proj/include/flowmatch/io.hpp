#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "flowmatch/grid.hpp"
#include "flowmatch/instance.hpp"

namespace flowmatch {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Parses JSON text; syntax errors become ErrorCode::MalformedFile with the
/// line number of the offending byte.
nlohmann::json parse_json(std::string_view text);

/// 1-based line of the start of element `index` in the top-level array `key`,
/// or 0 when not found.
int line_of_array_element(std::string_view text, std::string_view key, std::size_t index);

/// 1-based line of the top-level object key `key`, or 0 when not found.
int line_of_key(std::string_view text, std::string_view key);

nlohmann::json grid_to_json(const Grid& grid);
Grid parse_grid(std::string_view text);
Grid load_grid(const std::filesystem::path& path);

nlohmann::json instance_to_json(const Instance& instance);
Instance parse_instance(std::string_view text);
Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

}  // namespace flowmatch
