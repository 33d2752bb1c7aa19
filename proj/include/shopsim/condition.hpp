#pragma once

#include <regex>
#include <string>
#include <variant>
#include <vector>

#include "shopsim/devices.hpp"
#include "shopsim/environment.hpp"

namespace shopsim {

// A rule condition: a conjunction of `field op literal` clauses, or the
// literal `true`.
//
//   env.indoor_c > 20
//   door-1.locked == true && any(MotionDetector).motion == true
//   all(FireDetector).triggered == false
//
// Fields name an EnvState member (`env.<name>`), a member of one device's
// state (`<id>.<name>`), or a member quantified over every device of a kind
// (`any(<Kind>).<name>`, `all(<Kind>).<name>`; all() over no devices holds).
// Literals are numbers, true/false, or bare identifiers compared as strings
// (Low, Battery, ...). Booleans and strings support == and != only.
class Condition {
 public:
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge };
  enum class Scope { Env, Device, Any, All };

  struct Field {
    Scope scope = Scope::Env;
    std::string device;  // Scope::Device
    DeviceKind kind{};   // Scope::Any / Scope::All
    std::string name;
  };

  using Literal = std::variant<bool, double, std::string>;

  struct Clause {
    Field field;
    Op op = Op::Eq;
    Literal value;
  };

  Condition() : Condition("true") {}
  explicit Condition(std::string source) : source_(std::move(source)) { parse(); }

  const std::string& source() const noexcept { return source_; }
  const std::vector<Clause>& clauses() const noexcept { return clauses_; }

  // Checks that every referenced device exists and every field name is a
  // member of the referenced state.
  void validate(const DeviceTable& devices) const {
    const json env_fields = env_to_json(EnvState{});
    for (const Clause& c : clauses_) {
      switch (c.field.scope) {
        case Scope::Env:
          if (!env_fields.contains(c.field.name))
            throw Error(Errc::InvalidPolicy, "unknown env field '" + c.field.name + "'");
          break;
        case Scope::Device: {
          if (!DeviceId::valid(c.field.device))
            throw Error(Errc::InvalidPolicy, "bad device id '" + c.field.device + "'");
          auto it = devices.find(DeviceId(c.field.device));
          if (it == devices.end())
            throw Error(Errc::UnknownDevice, "condition references unknown device '" + c.field.device + "'");
          if (!state_to_json(it->second.state).contains(c.field.name))
            throw Error(Errc::InvalidPolicy, c.field.device + " has no field '" + c.field.name + "'");
          break;
        }
        case Scope::Any:
        case Scope::All:
          if (!state_to_json(default_state(c.field.kind)).contains(c.field.name))
            throw Error(Errc::InvalidPolicy,
                        std::string(to_string(c.field.kind)) + " has no field '" + c.field.name + "'");
          break;
      }
    }
  }

  bool eval(const EnvState& env, const DeviceTable& devices) const {
    for (const Clause& c : clauses_)
      if (!holds(c, env, devices)) return false;
    return true;
  }

  friend bool operator==(const Condition& a, const Condition& b) { return a.source_ == b.source_; }

 private:
  static bool compare(const json& v, Op op, const Literal& lit) {
    if (const bool* b = std::get_if<bool>(&lit)) {
      if (!v.is_boolean()) return false;
      if (op == Op::Eq) return v.get<bool>() == *b;
      if (op == Op::Ne) return v.get<bool>() != *b;
      return false;
    }
    if (const double* d = std::get_if<double>(&lit)) {
      if (!v.is_number()) return false;
      const double x = v.get<double>();
      switch (op) {
        case Op::Eq: return x == *d;
        case Op::Ne: return x != *d;
        case Op::Lt: return x < *d;
        case Op::Le: return x <= *d;
        case Op::Gt: return x > *d;
        case Op::Ge: return x >= *d;
      }
      return false;
    }
    const auto& s = std::get<std::string>(lit);
    if (!v.is_string()) return false;
    if (op == Op::Eq) return v.get<std::string>() == s;
    if (op == Op::Ne) return v.get<std::string>() != s;
    return false;
  }

  static bool holds(const Clause& c, const EnvState& env, const DeviceTable& devices) {
    switch (c.field.scope) {
      case Scope::Env: {
        const json e = env_to_json(env);
        auto it = e.find(c.field.name);
        return it != e.end() && compare(*it, c.op, c.value);
      }
      case Scope::Device: {
        if (!DeviceId::valid(c.field.device)) return false;
        auto it = devices.find(DeviceId(c.field.device));
        if (it == devices.end()) return false;
        const json s = state_to_json(it->second.state);
        auto f = s.find(c.field.name);
        return f != s.end() && compare(*f, c.op, c.value);
      }
      case Scope::Any:
      case Scope::All: {
        const bool want_all = c.field.scope == Scope::All;
        for (const auto& [id, dev] : devices) {
          if (dev.kind() != c.field.kind) continue;
          const json s = state_to_json(dev.state);
          auto f = s.find(c.field.name);
          const bool ok = f != s.end() && compare(*f, c.op, c.value);
          if (want_all && !ok) return false;
          if (!want_all && ok) return true;
        }
        return want_all;
      }
    }
    return false;
  }

  void parse() {
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string text = trim(source_);
    if (text == "true") return;
    if (text.empty()) throw Error(Errc::InvalidPolicy, "empty condition");

    static const std::regex clause_re(R"(^\s*(\S+)\s*(==|!=|<=|>=|<|>)\s*(\S+)\s*$)");
    static const std::regex quant_re(R"(^(any|all)\(([A-Za-z]+)\)\.([a-z_]+)$)");
    static const std::regex plain_re(R"(^([a-z0-9-]+)\.([a-z_]+)$)");
    static const std::regex ident_re(R"(^[A-Za-z_][A-Za-z0-9_]*$)");

    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto amp = text.find("&&", pos);
      const std::string part = text.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
      pos = amp == std::string::npos ? text.size() + 1 : amp + 2;

      std::smatch m;
      if (!std::regex_match(part, m, clause_re))
        throw Error(Errc::InvalidPolicy, "cannot parse clause '" + trim(part) + "'");
      Clause c;
      const std::string field = m[1], op = m[2], lit = m[3];

      std::smatch fm;
      if (std::regex_match(field, fm, quant_re)) {
        auto kind = kind_from_string(fm[2].str());
        if (!kind) throw Error(Errc::InvalidPolicy, "unknown kind '" + fm[2].str() + "'");
        c.field.scope = fm[1] == "any" ? Scope::Any : Scope::All;
        c.field.kind = *kind;
        c.field.name = fm[3];
      } else if (std::regex_match(field, fm, plain_re)) {
        if (fm[1] == "env") {
          c.field.scope = Scope::Env;
        } else {
          c.field.scope = Scope::Device;
          c.field.device = fm[1];
        }
        c.field.name = fm[2];
      } else {
        throw Error(Errc::InvalidPolicy, "bad field reference '" + field + "'");
      }

      if (op == "==") c.op = Op::Eq;
      else if (op == "!=") c.op = Op::Ne;
      else if (op == "<") c.op = Op::Lt;
      else if (op == "<=") c.op = Op::Le;
      else if (op == ">") c.op = Op::Gt;
      else c.op = Op::Ge;

      if (lit == "true" || lit == "false") {
        c.value = lit == "true";
      } else if (std::regex_match(lit, ident_re)) {
        c.value = lit;
      } else {
        try {
          std::size_t used = 0;
          double d = std::stod(lit, &used);
          if (used != lit.size() || !std::isfinite(d)) throw std::invalid_argument(lit);
          c.value = d;
        } catch (const std::exception&) {
          throw Error(Errc::InvalidPolicy, "bad literal '" + lit + "'");
        }
      }
      if (!std::holds_alternative<double>(c.value) && c.op != Op::Eq && c.op != Op::Ne)
        throw Error(Errc::InvalidPolicy, "ordering comparison on non-numeric literal in '" + trim(part) + "'");
      clauses_.push_back(std::move(c));
    }
  }

  std::string source_;
  std::vector<Clause> clauses_;
};

}  // namespace shopsim
