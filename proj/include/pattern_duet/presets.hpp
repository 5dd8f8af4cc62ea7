#pragma once

#include <string>

#include "kinetics.hpp"

namespace pattern_duet {

struct Preset {
  ModelParams params;
  int k1, k2;
};

// Set 1 sits at the (2,3) interaction, set 2 at the (1,2) interaction.
inline Preset preset(int id) {
  switch (id) {
    case 1: return {{6.0, 3.0, 0.5, 0.2064, 0.0051, 0.7, 1.0}, 2, 3};
    case 2: return {{5.0, 3.0, 0.1, 0.2679, 0.01195, 4.0, 1.0}, 1, 2};
  }
  fail(ErrorKind::InvalidInput, "unknown parameter set " + std::to_string(id));
}

}  // namespace pattern_duet
