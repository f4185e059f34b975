#include "qlink/records.hpp"

namespace qlink {

const std::array<std::pair<Basis, Basis>, kProjectorCount> kProjectorTable = {{
    {Basis::H, Basis::H}, {Basis::H, Basis::V}, {Basis::H, Basis::D}, {Basis::H, Basis::L},
    {Basis::V, Basis::H}, {Basis::V, Basis::V}, {Basis::V, Basis::D}, {Basis::V, Basis::L},
    {Basis::D, Basis::H}, {Basis::D, Basis::V}, {Basis::D, Basis::D}, {Basis::D, Basis::R},
    {Basis::R, Basis::H}, {Basis::R, Basis::V}, {Basis::R, Basis::D}, {Basis::R, Basis::L},
}};

const std::array<const char*, kProjectorCount> kProjectorLabels = {
    "HH", "HV", "HD", "HL", "VH", "VV", "VD", "VL",
    "DH", "DV", "DD", "DR", "RH", "RV", "RD", "RL",
};

int projector_index(const std::string& label) {
  for (int i = 0; i < kProjectorCount; ++i)
    if (label == kProjectorLabels[i]) return i;
  throw DomainError("projector_index: unknown label '" + label + "'");
}

PureState projector_state(int index) {
  if (index < 0 || index >= kProjectorCount)
    throw DomainError("projector_state: index out of range");
  const auto& [a, b] = kProjectorTable[index];
  return tensor(PureState::ket(a), PureState::ket(b));
}

}  // namespace qlink
