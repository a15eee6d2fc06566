#pragma once

#include "vjmstiff/chain.hpp"

#include <stdexcept>
#include <string>

namespace vjm {

struct ChainParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses a chain-description document (JSON). Grammar:
///
/// {
///   "name": "...",                       // optional
///   "compliance_matrices": {             // optional, named 6x6 row-major
///     "foot": [[...6 rows of 6...]]      // SI units: m/N, rad/(N m)
///   },
///   "elements": [                        // required, order = chain order
///     {"kind": "rigid", "transform": [[...4 rows of 4...]]},
///     {"kind": "rigid", "axis": "Tx", "value": 0.1},
///     {"kind": "passive", "axis": "Rz"},
///     {"kind": "actuated", "axis": "Tx", "value": 0.0},
///     {"kind": "spring1", "axis": "Tx", "k": 1000.0},
///     {"kind": "spring6", "compliance": "foot", "scale": 2.0},
///     {"kind": "spring6", "stiffness": [[...6 rows of 6...]]}
///   ]
/// }
///
/// Every element accepts an optional "name"; passive elements accept an
/// optional explicit "q_index" and springs an optional "theta_index"
/// (explicit and implicit indexing cannot be mixed). Compliance matrices are
/// symmetrized by averaging and inverted; "scale" multiplies the resulting
/// stiffness. Unknown kinds or fields, duplicate indices and non-positive-
/// definite matrices raise ChainParseError naming the offending element.
ChainModel parse_chain(const std::string& json_text);

ChainModel load_chain_file(const std::string& path);

}  // namespace vjm
