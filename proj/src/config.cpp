/*
   Copyright 2026 The fdradio Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Scenario file reader. The format is a small TOML subset: [tables],
// key = value lines, strings, numbers, booleans and single-line arrays.

#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdr/harness.hpp"

namespace fdr {

namespace {

struct Value {
  enum class Kind { String, Number, Bool, Array } kind = Kind::Number;
  std::string str;
  double num = 0.0;
  bool is_int = false;
  bool flag = false;
  std::vector<Value> items;
};

class LineParser {
 public:
  LineParser(const std::string& text, int line, std::string field)
      : s_(text), line_(line), field_(std::move(field)) {}

  Value parse_value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    Value v;
    if (c == '"') {
      v.kind = Value::Kind::String;
      v.str = parse_string();
    } else if (c == '[') {
      ++pos_;
      v.kind = Value::Kind::Array;
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        v.items.push_back(parse_value());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          if (peek() == ']') {
            ++pos_;
            break;
          }
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in array");
      }
    } else if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      v.kind = Value::Kind::Bool;
      v.flag = true;
    } else if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      v.kind = Value::Kind::Bool;
    } else {
      parse_number(v);
    }
    return v;
  }

  void expect_end() {
    skip_ws();
    if (pos_ < s_.size()) fail("unexpected trailing text '" + s_.substr(pos_) + "'");
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("line " + std::to_string(line_) + ", field '" + field_ + "': " + what, line_,
                     field_);
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out += s_[pos_++];
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  void parse_number(Value& v) {
    const std::size_t begin = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '-' || s_[pos_] == '+' ||
                                s_[pos_] == '_'))
      ++pos_;
    std::string tok = s_.substr(begin, pos_ - begin);
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    std::size_t used = 0;
    try {
      v.num = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail("'" + tok + "' is not a number");
    }
    if (used != tok.size() || !std::isfinite(v.num)) fail("'" + tok + "' is not a number");
    v.kind = Value::Kind::Number;
    v.is_int = tok.find_first_of(".eE") == std::string::npos;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
  std::string field_;
};

struct Entry {
  std::string key;
  Value value;
  int line = 0;
};

struct Table {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

[[noreturn]] void bad(const Entry& e, const std::string& what) {
  throw ParseError("line " + std::to_string(e.line) + ", field '" + e.key + "': " + what, e.line,
                   e.key);
}

double as_number(const Entry& e) {
  if (e.value.kind != Value::Kind::Number) bad(e, "expected a number");
  return e.value.num;
}

long long as_int(const Entry& e) {
  if (e.value.kind != Value::Kind::Number || !e.value.is_int) bad(e, "expected an integer");
  return static_cast<long long>(e.value.num);
}

bool as_bool(const Entry& e) {
  if (e.value.kind != Value::Kind::Bool) bad(e, "expected true or false");
  return e.value.flag;
}

std::string as_string(const Entry& e) {
  if (e.value.kind != Value::Kind::String) bad(e, "expected a string");
  return e.value.str;
}

TapList as_taps(const Entry& e) {
  if (e.value.kind != Value::Kind::Array || e.value.items.empty())
    bad(e, "expected a non-empty list of [delay, gain_db, phase_deg] taps");
  TapList taps;
  for (const auto& t : e.value.items) {
    if (t.kind != Value::Kind::Array || t.items.size() != 3)
      bad(e, "each tap must be [delay, gain_db, phase_deg]");
    std::array<double, 3> tap{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (t.items[i].kind != Value::Kind::Number) bad(e, "tap entries must be numbers");
      tap[i] = t.items[i].num;
    }
    if (!t.items[0].is_int || tap[0] < 0) bad(e, "tap delay must be a non-negative integer");
    taps.push_back(tap);
  }
  return taps;
}

void apply(Scenario& s, const Entry& e) {
  const std::string& k = e.key;
  ImpairmentConfig& imp = s.impairments;
  if (k == "profile") {
    try {
      s.profile = profile_from_string(as_string(e));
    } catch (const ConfigError& err) {
      bad(e, err.what());
    }
  } else if (k == "qam_down") s.qam_down = static_cast<int>(as_int(e));
  else if (k == "qam_up") s.qam_up = static_cast<int>(as_int(e));
  else if (k == "snr_db") s.snr_db = as_number(e);
  else if (k == "noise_below_si_db") s.noise_below_si_db = as_number(e);
  else if (k == "si_tx_db") s.si_tx_db = as_number(e);
  else if (k == "si_channel") s.si_channel = as_taps(e);
  else if (k == "desired_channel") s.desired_channel = as_taps(e);
  else if (k == "dac_bits") imp.dac_bits = static_cast<int>(as_int(e));
  else if (k == "adc_bits") imp.adc_bits = static_cast<int>(as_int(e));
  else if (k == "dac_headroom_db") s.dac_headroom_db = as_number(e);
  else if (k == "adc_headroom_db") s.adc_headroom_db = as_number(e);
  else if (k == "iq_gain_mismatch_db") imp.iq_gain_mismatch_db = as_number(e);
  else if (k == "iq_phase_mismatch_deg") imp.iq_phase_mismatch_deg = as_number(e);
  else if (k == "tx_gain_db") imp.tx_gain_db = as_number(e);
  else if (k == "tx_phase_deg") imp.tx_phase_deg = as_number(e);
  else if (k == "pa_enabled") imp.pa.enabled = as_bool(e);
  else if (k == "pa_a1") imp.pa.a1 = as_number(e);
  else if (k == "pa_a3") {
    if (e.value.kind != Value::Kind::Array || e.value.items.size() != 2 ||
        e.value.items[0].kind != Value::Kind::Number || e.value.items[1].kind != Value::Kind::Number)
      bad(e, "expected [re, im]");
    imp.pa.a3 = {e.value.items[0].num, e.value.items[1].num};
  } else if (k == "timing_offset_samples") imp.timing_offset_samples = static_cast<int>(as_int(e));
  else if (k == "passive_isolation_db") s.analog.passive_isolation_db = as_number(e);
  else if (k == "active_canceller") s.analog.active_enabled = as_bool(e);
  else if (k == "tune_active_tap") s.tune_active_tap = as_bool(e);
  else if (k == "active_attenuation_db") s.analog.active_tap.attenuation_db = as_number(e);
  else if (k == "active_phase_deg") s.analog.active_tap.phase_rad = as_number(e) * kPi / 180.0;
  else if (k == "active_delay") s.analog.active_tap.delay_samples = static_cast<int>(as_int(e));
  else if (k == "active_max_delay") s.active_max_delay = static_cast<int>(as_int(e));
  else if (k == "digital_canceller") s.digital_canceller = as_bool(e);
  else if (k == "both_directions") s.both_directions = as_bool(e);
  else if (k == "seed") {
    if (as_int(e) < 0) bad(e, "seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(as_int(e));
  } else if (k == "num_frames") s.num_frames = static_cast<int>(as_int(e));
  else if (k == "own_offset") s.own_offset = static_cast<int>(as_int(e));
  else if (k == "peer_lag") s.peer_lag = static_cast<int>(as_int(e));
  else bad(e, "unknown key");
}

bool valid_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

SuiteConfig parse_suite(const std::string& text) {
  std::deque<Table> tables;  // stable addresses for `current`
  Table* current = nullptr;
  std::set<std::string> seen_tables;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ParseError("line " + std::to_string(line_no) + ": malformed table header", line_no, "");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name != "suite" && name != "defaults") {
        if (name.rfind("scenario.", 0) != 0 || !valid_id(name.substr(9)))
          throw ParseError("line " + std::to_string(line_no) + ": table must be [suite], "
                           "[defaults] or [scenario.<id>] with id of letters, digits, '_' or '-'",
                           line_no, name);
      }
      if (!seen_tables.insert(name).second) {
        const bool scen = name.rfind("scenario.", 0) == 0;
        throw ParseError("line " + std::to_string(line_no) + ": duplicate " +
                             (scen ? "scenario id '" + name.substr(9) + "'" : "table [" + name + "]"),
                         line_no, scen ? name.substr(9) : name);
      }
      tables.push_back({name, line_no, {}});
      current = &tables.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key = value", line_no, "");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || !valid_id(key))
      throw ParseError("line " + std::to_string(line_no) + ": invalid key '" + key + "'", line_no, key);
    if (current == nullptr)
      throw ParseError("line " + std::to_string(line_no) + ": key outside of a table", line_no, key);
    for (const auto& e : current->entries)
      if (e.key == key)
        throw ParseError("line " + std::to_string(line_no) + ", field '" + key +
                             "': duplicate key (first set on line " + std::to_string(e.line) + ")",
                         line_no, key);
    const std::string rest = line.substr(eq + 1);
    LineParser p(rest, line_no, key);
    Value v = p.parse_value();
    p.expect_end();
    current->entries.push_back({key, std::move(v), line_no});
  }

  SuiteConfig suite;
  const Table* defaults = nullptr;
  for (const auto& t : tables) {
    if (t.name == "defaults") defaults = &t;
    if (t.name == "suite") {
      for (const auto& e : t.entries) {
        if (e.key == "name") suite.name = as_string(e);
        else bad(e, "unknown key in [suite]");
      }
    }
  }
  // Validate defaults once even when there are no scenarios.
  if (defaults) {
    Scenario probe;
    for (const auto& e : defaults->entries) {
      if (e.key == "id") bad(e, "id is taken from the table name");
      apply(probe, e);
    }
  }
  for (const auto& t : tables) {
    if (t.name.rfind("scenario.", 0) != 0) continue;
    Scenario s;
    s.id = t.name.substr(9);
    if (defaults)
      for (const auto& e : defaults->entries) apply(s, e);
    for (const auto& e : t.entries) apply(s, e);
    try {
      s.validate();
    } catch (const ConfigError& err) {
      throw ParseError("line " + std::to_string(t.line) + ", scenario '" + s.id + "': " + err.what(),
                       t.line, s.id);
    }
    suite.scenarios.push_back(std::move(s));
  }
  return suite;
}

SuiteConfig load_suite(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path, 0, "");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_suite(ss.str());
}

}  // namespace fdr
