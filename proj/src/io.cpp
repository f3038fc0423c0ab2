#include "flowmatch/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "flowmatch/error.hpp"

namespace flowmatch {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

namespace {

int line_at(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Minimal structural scanner over JSON text. Calls `visit(pos, depth, kind)`
// for every top-level key (kind 'k') and every array element start at depth 2
// (kind 'e'). Returns early when visit returns true.
template <typename Visit>
void scan(std::string_view text, Visit&& visit) {
  int depth = 0;
  bool expect_element = false;
  std::string_view current_key;
  std::size_t element = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    if (expect_element && c != ']') {
      expect_element = false;
      if (visit(i, current_key, element++)) return;
    }
    if (c == '"') {
      const std::size_t start = i + 1;
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\') ++i;
        ++i;
      }
      if (depth == 1) {
        std::size_t j = i + 1;
        while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
        if (j < text.size() && text[j] == ':') {
          current_key = text.substr(start, i - start);
          element = 0;
          if (visit(start - 1, current_key, static_cast<std::size_t>(-1))) return;
        }
      }
      continue;
    }
    if (c == '{' || c == '[') {
      ++depth;
      if (c == '[' && depth == 2) expect_element = true;
    } else if (c == '}' || c == ']') {
      --depth;
    } else if (c == ',' && depth == 2) {
      expect_element = true;
    }
  }
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw Error(ErrorCode::MalformedFile, message, line);
}

double number_field(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    fail(line, std::string("missing or non-numeric field \"") + key + "\"");
  }
  return it->get<double>();
}

std::size_t index_field(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer() || it->get<long long>() < 0) {
    fail(line, std::string("missing or invalid index field \"") + key + "\"");
  }
  return it->get<std::size_t>();
}

Grid grid_from_json(const json& doc, std::string_view text) {
  if (!doc.is_object()) fail(1, "top level must be an object");
  const auto buses_it = doc.find("buses");
  const auto lines_it = doc.find("lines");
  if (buses_it == doc.end() || !buses_it->is_array()) {
    fail(line_of_key(text, "buses"), "missing \"buses\" array");
  }
  if (lines_it == doc.end() || !lines_it->is_array()) {
    fail(line_of_key(text, "lines"), "missing \"lines\" array");
  }

  std::vector<Bus> buses;
  for (std::size_t i = 0; i < buses_it->size(); ++i) {
    const auto& b = (*buses_it)[i];
    const int line = line_of_array_element(text, "buses", i);
    if (!b.is_object()) fail(line, "bus entry must be an object");
    Bus bus;
    bus.id = index_field(b, "id", line);
    if (bus.id != i) fail(line, "bus ids must be contiguous 0..N-1 in file order");
    if (auto n = b.find("name"); n != b.end()) {
      if (!n->is_string()) fail(line, "bus name must be a string");
      bus.name = n->get<std::string>();
    }
    buses.push_back(std::move(bus));
  }

  std::vector<Line> lines;
  for (std::size_t i = 0; i < lines_it->size(); ++i) {
    const auto& l = (*lines_it)[i];
    const int line = line_of_array_element(text, "lines", i);
    if (!l.is_object()) fail(line, "line entry must be an object");
    const auto from = index_field(l, "from", line);
    const auto to = index_field(l, "to", line);
    if (from >= buses.size() || to >= buses.size()) fail(line, "line references unknown bus");
    try {
      lines.emplace_back(from, to, number_field(l, "length_m", line),
                         number_field(l, "x_ohm_per_km", line),
                         number_field(l, "r_ohm_per_km", line),
                         number_field(l, "i_max_a", line),
                         number_field(l, "v_v", line));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedFile) throw;
      fail(line, e.what());
    }
  }
  Grid grid(std::move(buses), std::move(lines));
  if (!grid.is_connected()) fail(line_of_key(text, "lines"), "grid is not connected");
  return grid;
}

}  // namespace

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedFile, e.what(), line_at(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

int line_of_array_element(std::string_view text, std::string_view key, std::size_t index) {
  int found = 0;
  scan(text, [&](std::size_t pos, std::string_view k, std::size_t element) {
    if (k == key && element == index) {
      found = line_at(text, pos);
      return true;
    }
    return false;
  });
  return found;
}

int line_of_key(std::string_view text, std::string_view key) {
  int found = 0;
  scan(text, [&](std::size_t pos, std::string_view k, std::size_t element) {
    if (k == key && element == static_cast<std::size_t>(-1)) {
      found = line_at(text, pos);
      return true;
    }
    return false;
  });
  return found;
}

json grid_to_json(const Grid& grid) {
  json doc;
  doc["buses"] = json::array();
  for (const auto& b : grid.buses()) doc["buses"].push_back({{"id", b.id}, {"name", b.name}});
  doc["lines"] = json::array();
  for (const auto& l : grid.lines()) {
    doc["lines"].push_back({{"from", l.from()},
                            {"to", l.to()},
                            {"length_m", l.length_m()},
                            {"x_ohm_per_km", l.reactance_per_km()},
                            {"r_ohm_per_km", l.resistance_per_km()},
                            {"i_max_a", l.max_current_a()},
                            {"v_v", l.voltage_v()}});
  }
  return doc;
}

Grid parse_grid(std::string_view text) { return grid_from_json(parse_json(text), text); }

Grid load_grid(const std::filesystem::path& path) { return parse_grid(read_text_file(path)); }

json instance_to_json(const Instance& inst) {
  json doc = grid_to_json(inst.grid);
  json loads = json::object();
  for (BusId b = 0; b < inst.loads.demand.size(); ++b) loads[std::to_string(b)] = inst.loads.demand[b];
  doc["loads"] = loads;
  doc["producers"] = inst.loads.producers;
  doc["consumers"] = inst.loads.consumers;
  doc["rho_ct_per_kwh"] = inst.rho;
  doc["alpha_ct_per_kwh2"] = inst.alpha;
  doc["period_h"] = inst.period_h;
  doc["seed"] = inst.seed;
  doc["case"] = inst.case_name;
  return doc;
}

Instance parse_instance(std::string_view text) {
  const json doc = parse_json(text);
  Grid grid = grid_from_json(doc, text);

  auto key_line = [&](const char* key) { return line_of_key(text, key); };
  auto require = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    if (it == doc.end()) fail(1, std::string("missing field \"") + key + "\"");
    return *it;
  };

  PeerLoads loads;
  loads.demand.assign(grid.bus_count(), 0.0);
  const json& load_obj = require("loads");
  if (!load_obj.is_object()) fail(key_line("loads"), "\"loads\" must be an object");
  std::vector<int> present(grid.bus_count(), 0);
  for (const auto& [key, value] : load_obj.items()) {
    std::size_t bus = 0;
    try {
      std::size_t used = 0;
      bus = std::stoul(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      fail(key_line("loads"), "load key \"" + key + "\" is not a bus id");
    }
    if (bus >= grid.bus_count()) fail(key_line("loads"), "load for unknown bus " + key);
    if (!value.is_number()) fail(key_line("loads"), "load for bus " + key + " is not numeric");
    loads.demand[bus] = value.get<double>();
    present[bus] = 1;
  }
  if (std::find(present.begin(), present.end(), 0) != present.end()) {
    fail(key_line("loads"), "every bus needs a load entry");
  }
  auto id_list = [&](const char* key) {
    const json& arr = require(key);
    if (!arr.is_array()) fail(key_line(key), std::string("\"") + key + "\" must be an array");
    std::vector<BusId> ids;
    for (const auto& v : arr) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        fail(key_line(key), std::string("\"") + key + "\" must hold bus ids");
      }
      ids.push_back(v.get<BusId>());
    }
    return ids;
  };
  loads.producers = id_list("producers");
  loads.consumers = id_list("consumers");

  auto number = [&](const char* key) {
    const json& v = require(key);
    if (!v.is_number()) fail(key_line(key), std::string("\"") + key + "\" must be numeric");
    return v.get<double>();
  };
  Instance inst{std::move(grid), std::move(loads), number("rho_ct_per_kwh"),
                number("alpha_ct_per_kwh2"), number("period_h"), 0, ""};
  const json& seed = require("seed");
  if (!seed.is_number_unsigned()) fail(key_line("seed"), "\"seed\" must be a non-negative integer");
  inst.seed = seed.get<std::uint64_t>();
  const json& name = require("case");
  if (!name.is_string()) fail(key_line("case"), "\"case\" must be a string");
  inst.case_name = name.get<std::string>();
  try {
    validate(inst);
  } catch (const Error& e) {
    fail(key_line("loads"), e.what());
  }
  return inst;
}

Instance load_instance(const std::filesystem::path& path) {
  return parse_instance(read_text_file(path));
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  write_text_file(path, instance_to_json(instance).dump(2) + "\n");
}

}  // namespace flowmatch
