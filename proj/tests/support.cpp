#include "support.hpp"

namespace eqshbc::testing {

SweepSpec spec_4cm(Orientation o) {
  SweepSpec s;
  s.tx = TxSpec::from_preset(o, TxSpec{}.center);
  s.resolution_m = 0.04;
  s.track = {-0.56, 0.56, 0.04};
  s.surface = {0.16, 0.24, 0.04};
  s.rx.galvanic_spacing_m = 0.08;
  return s;
}

const SolvedScene &scene_4cm(Orientation o) {
  static std::map<Orientation, SolvedScene> cache;
  auto it = cache.find(o);
  if (it == cache.end())
    it = cache.emplace(o, solve_scene(spec_4cm(o), default_table())).first;
  return it->second;
}

} // namespace eqshbc::testing
