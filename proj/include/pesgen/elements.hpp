#pragma once

#include <string>
#include <string_view>

namespace pesgen {

inline constexpr int kMaxAtomicNumber = 118;

/// Chemical symbol for atomic number z (1..118). Throws InvalidInput otherwise.
std::string element_symbol(int z);

/// Atomic number for a chemical symbol ("H", "He", ...). Throws InvalidInput on unknown symbols.
int element_number(std::string_view symbol);

bool is_valid_atomic_number(int z);

}  // namespace pesgen
