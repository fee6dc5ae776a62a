#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pinnafe {

// Flat, schema-checked key=value configuration.  Every key must be declared
// (define) before a file or an override can set it; unknown keys are hard
// errors so typos never silently fall back to defaults.
class Config {
 public:
  void define(const std::string& key, const std::string& type,
              const std::string& def, const std::string& help);

  // '#' comments, blank lines, key = value (value may contain spaces).
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  bool is_set(const std::string& key) const;  // set beyond its default?
  int64_t get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;

  // Every key with its effective value, sorted, one per line.
  void write_resolved(const std::string& path) const;
  // Schema dump: key, type, default, help.
  void write_schema(const std::string& path) const;

 private:
  struct Entry {
    std::string type, def, help, value;
    bool set = false;
  };
  const Entry& at(const std::string& key) const;
  void check_value(const std::string& key, const Entry& e,
                   const std::string& value) const;

  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

// Output root: $PINNAFE_OUT_ROOT when set, "." otherwise.
std::string out_root();

// Creates dir (and parents) if missing; returns it.
std::string ensure_dir(const std::string& dir);

}  // namespace pinnafe
