#include "pesgen/elements.hpp"

#include <array>

#include "pesgen/error.hpp"

namespace pesgen {

namespace {

constexpr std::array<const char*, kMaxAtomicNumber + 1> kSymbols = {
    "X",  // placeholder for z = 0
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
    "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh",
    "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re",
    "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db",
    "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

}  // namespace

bool is_valid_atomic_number(int z) { return z >= 1 && z <= kMaxAtomicNumber; }

std::string element_symbol(int z) {
  if (!is_valid_atomic_number(z))
    throw InvalidInput("atomic number out of range 1..118: " + std::to_string(z));
  return kSymbols[static_cast<std::size_t>(z)];
}

int element_number(std::string_view symbol) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z)
    if (symbol == kSymbols[static_cast<std::size_t>(z)]) return z;
  throw InvalidInput("unknown element symbol: '" + std::string(symbol) + "'");
}

}  // namespace pesgen
