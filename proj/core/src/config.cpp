#include "pinnafe/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "pinnafe/errors.hpp"

namespace pinnafe {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(uint8_t(s[a]))) ++a;
  while (b > a && std::isspace(uint8_t(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

void Config::define(const std::string& key, const std::string& type,
                    const std::string& def, const std::string& help) {
  if (entries_.count(key)) throw ConfigError("duplicate key '" + key + "'");
  if (type != "int" && type != "real" && type != "bool" && type != "string")
    throw ConfigError("bad type '" + type + "' for key '" + key + "'");
  Entry e;
  e.type = type;
  e.def = def;
  e.help = help;
  e.value = def;
  check_value(key, e, def);
  entries_.emplace(key, std::move(e));
  order_.push_back(key);
}

void Config::check_value(const std::string& key, const Entry& e,
                         const std::string& value) const {
  try {
    size_t pos = 0;
    if (e.type == "int") {
      (void)std::stoll(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
    } else if (e.type == "real") {
      (void)std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
    } else if (e.type == "bool") {
      if (value != "true" && value != "false" && value != "0" && value != "1")
        throw std::invalid_argument(value);
    }
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects " + e.type + ", got '" +
                      value + "'");
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
  check_value(key, it->second, value);
  it->second.value = value;
  it->second.set = true;
}

const Config::Entry& Config::at(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

bool Config::is_set(const std::string& key) const { return at(key).set; }

int64_t Config::get_int(const std::string& key) const {
  const Entry& e = at(key);
  if (e.type != "int") throw ConfigError("key '" + key + "' is not int");
  return std::stoll(e.value);
}

double Config::get_real(const std::string& key) const {
  const Entry& e = at(key);
  if (e.type != "real" && e.type != "int")
    throw ConfigError("key '" + key + "' is not real");
  return std::stod(e.value);
}

bool Config::get_bool(const std::string& key) const {
  const Entry& e = at(key);
  if (e.type != "bool") throw ConfigError("key '" + key + "' is not bool");
  return e.value == "true" || e.value == "1";
}

std::string Config::get_string(const std::string& key) const {
  return at(key).value;
}

void Config::write_resolved(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::vector<std::string> keys = order_;
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys)
    std::fprintf(f, "%s = %s\n", k.c_str(), entries_.at(k).value.c_str());
  std::fclose(f);
}

void Config::write_schema(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  for (const auto& k : order_) {
    const Entry& e = entries_.at(k);
    std::fprintf(f, "%s  (%s, default %s)  %s\n", k.c_str(), e.type.c_str(),
                 e.def.empty() ? "\"\"" : e.def.c_str(), e.help.c_str());
  }
  std::fclose(f);
}

std::string out_root() {
  const char* env = std::getenv("PINNAFE_OUT_ROOT");
  return env && *env ? env : ".";
}

std::string ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  return dir;
}

}  // namespace pinnafe
