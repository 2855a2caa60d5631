#pragma once

#include <string>

#include "json.hpp"
#include "rslf/error.hpp"
#include "rslf/geometry.hpp"
#include "rslf/lightfield.hpp"

namespace rslf::io {

using Json = nlohmann::json;

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Json to_json(const MotionParams& m) {
  return {{"omega", to_json(m.omega)}, {"vel", to_json(m.vel)}};
}

inline MotionParams motion_from_json(const Json& j) {
  return {vec3_from_json(j.at("omega")), vec3_from_json(j.at("vel"))};
}

inline Json to_json(const LFIntrinsics& i) {
  return {{"f", i.f}, {"u0", i.u0}, {"v0", i.v0}, {"w", i.w},
          {"F", i.F}, {"b", i.b},   {"Pf", i.Pf}};
}

inline LFIntrinsics intrinsics_from_json(const Json& j) {
  LFIntrinsics i;
  i.f = j.at("f").get<double>();
  i.u0 = j.at("u0").get<double>();
  i.v0 = j.at("v0").get<double>();
  i.w = j.at("w").get<double>();
  i.F = j.at("F").get<double>();
  i.b = j.at("b").get<double>();
  i.Pf = j.at("Pf").get<double>();
  return i;
}

}  // namespace rslf::io
