// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/situation.hpp"

#include <algorithm>

namespace ksf {

const FusedObject* find_vut_object(const SituationRecord& s) {
  for (const auto& o : s.objects) {
    const bool own = std::any_of(o.provenance.begin(), o.provenance.end(), [&](const Provenance& p) {
      return p.source == ObservationSource::VutLocalSensor && p.reporter == s.vut;
    });
    if (own) return &o;
  }
  return nullptr;
}

}  // namespace ksf
