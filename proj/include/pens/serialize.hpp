#ifndef PENS_SERIALIZE_HPP
#define PENS_SERIALIZE_HPP

#include "pens/ensemble.hpp"

#include <string>

namespace pens {

/// Model file format version written by save_model and required by load_model.
inline constexpr int kModelVersion = 1;

/// Full ensemble state as a JSON document (see docs/model-format.md).
std::string dump_model(const Pensemble& ens);
/// Parses a document produced by dump_model. Throws DataError on malformed,
/// truncated or wrong-version input; nothing is constructed in that case.
Pensemble parse_model(const std::string& text);

void save_model(const Pensemble& ens, const std::string& path);
Pensemble load_model(const std::string& path);

}  // namespace pens

#endif  // PENS_SERIALIZE_HPP
