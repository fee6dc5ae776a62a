#include "pinnafe/feature_pool.hpp"

#include <sstream>

#include "pinnafe/errors.hpp"

namespace pinnafe {

namespace {

const char* axis_name(int a) {
  static const char* names[3] = {"x", "y", "z"};
  return names[a];
}

int parse_axis(char c, int dim, const std::string& tag) {
  int a = c == 'x' ? 0 : c == 'y' ? 1 : c == 'z' ? 2 : -1;
  if (a < 0 || a >= dim)
    throw ConfigError("feature tag '" + tag + "' names an axis outside dim=" +
                      std::to_string(dim));
  return a;
}

FeatureRecipe parse_one(const std::string& tag, int dim) {
  auto bad = [&]() -> FeatureRecipe {
    throw ConfigError("unknown feature tag '" + tag + "'");
  };
  if (tag.size() == 1) return {FeatureKind::Coord, parse_axis(tag[0], dim, tag)};
  if (tag.size() == 3 && tag[1] == '^') {
    int a = parse_axis(tag[0], dim, tag);
    if (tag[2] == '2') return {FeatureKind::Square, a};
    if (tag[2] == '3') return {FeatureKind::Cube, a};
    return bad();
  }
  if (tag.size() == 3 && tag[1] == '*') {
    int a = parse_axis(tag[0], dim, tag);
    int b = parse_axis(tag[2], dim, tag);
    return {FeatureKind::PairProd, a, b};
  }
  if (tag.size() == 6 && tag[3] == '(' && tag[5] == ')') {
    int a = parse_axis(tag[4], dim, tag);
    std::string fn = tag.substr(0, 3);
    if (fn == "exp") return {FeatureKind::Exp, a};
    if (fn == "sin") return {FeatureKind::Sin, a};
    if (fn == "cos") return {FeatureKind::Cos, a};
  }
  return bad();
}

}  // namespace

std::string feature_tag(const FeatureRecipe& r) {
  switch (r.kind) {
    case FeatureKind::Coord:
      return axis_name(r.a);
    case FeatureKind::Square:
      return std::string(axis_name(r.a)) + "^2";
    case FeatureKind::Cube:
      return std::string(axis_name(r.a)) + "^3";
    case FeatureKind::PairProd:
      return std::string(axis_name(r.a)) + "*" + axis_name(r.b);
    case FeatureKind::Exp:
      return "exp(" + std::string(axis_name(r.a)) + ")";
    case FeatureKind::Sin:
      return "sin(" + std::string(axis_name(r.a)) + ")";
    case FeatureKind::Cos:
      return "cos(" + std::string(axis_name(r.a)) + ")";
  }
  return "?";
}

FeaturePoolSpec FeaturePoolSpec::parse(int dim, const std::string& tags) {
  FeaturePoolSpec spec;
  spec.dim = dim;
  std::stringstream ss(tags);
  std::string item;
  while (std::getline(ss, item, ',')) {
    // trim spaces
    size_t b = item.find_first_not_of(" \t");
    size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    spec.items.push_back(parse_one(item.substr(b, e - b + 1), dim));
  }
  if (spec.items.empty()) throw ConfigError("feature pool is empty");
  return spec;
}

FeaturePoolSpec FeaturePoolSpec::preset(const std::string& name) {
  if (name == "smooth2d")
    return parse(2, "x,y,x^2,y^2,x*y,exp(x),exp(y)");
  if (name == "singular2d")
    return parse(2, "x,y,x^2,y^2,x*y,exp(x),exp(y),sin(x),cos(x),sin(y),cos(y),x^3");
  if (name == "smooth3d")
    return parse(3, "x,y,z,x^2,y^2,z^2,x*y,x*z,y*z,exp(x),exp(y),exp(z)");
  if (name == "ot1d") return parse(1, "x,x^2,exp(x)");
  throw ConfigError("unknown feature pool preset '" + name + "'");
}

std::string FeaturePoolSpec::tag() const {
  std::string s;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) s += ",";
    s += feature_tag(items[i]);
  }
  return s;
}

void build_features(const FeaturePoolSpec& spec, const double* x,
                    int order_dim, Jet* out) {
  const int d = order_dim;
  for (size_t i = 0; i < spec.items.size(); ++i) {
    const FeatureRecipe& r = spec.items[i];
    Jet& j = out[i];
    jet_zero(j);
    const double xa = x[r.a];
    switch (r.kind) {
      case FeatureKind::Coord:
        j.c[0] = xa;
        if (d > 0) j.g(r.a) = 1.0;
        break;
      case FeatureKind::Square:
        j.c[0] = xa * xa;
        if (d > 0) {
          j.g(r.a) = 2.0 * xa;
          jet_h(j, r.a, r.a, d) = 2.0;
        }
        break;
      case FeatureKind::Cube:
        j.c[0] = xa * xa * xa;
        if (d > 0) {
          j.g(r.a) = 3.0 * xa * xa;
          jet_h(j, r.a, r.a, d) = 6.0 * xa;
        }
        break;
      case FeatureKind::PairProd: {
        const double xb = x[r.b];
        j.c[0] = xa * xb;
        if (d > 0) {
          j.g(r.a) += xb;
          j.g(r.b) += xa;
          jet_h(j, r.a, r.b, d) += 1.0;
          if (r.a == r.b) jet_h(j, r.a, r.a, d) += 1.0;  // x*x degenerates to x^2
        }
        break;
      }
      case FeatureKind::Exp: {
        double e = std::exp(xa);
        j.c[0] = e;
        if (d > 0) {
          j.g(r.a) = e;
          jet_h(j, r.a, r.a, d) = e;
        }
        break;
      }
      case FeatureKind::Sin:
        j.c[0] = std::sin(xa);
        if (d > 0) {
          j.g(r.a) = std::cos(xa);
          jet_h(j, r.a, r.a, d) = -std::sin(xa);
        }
        break;
      case FeatureKind::Cos:
        j.c[0] = std::cos(xa);
        if (d > 0) {
          j.g(r.a) = -std::sin(xa);
          jet_h(j, r.a, r.a, d) = -std::cos(xa);
        }
        break;
    }
  }
}

}  // namespace pinnafe
