#pragma once

#include <string>
#include <vector>

#include "hse/model_spec.h"

namespace hse {

// rCDAE, cCDAE, hCDAE, rCRN, cCRN, hCRN, plus toy_rCDAE and toy_hCDAE.
std::vector<std::string> shipped_names();
// The six full-size models only.
std::vector<std::string> reference_model_names();
ModelSpec shipped_spec(const std::string& name);

}  // namespace hse
