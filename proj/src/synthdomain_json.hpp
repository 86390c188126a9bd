#pragma once

#include <json.hpp>

#include "mdk/synthdomain.hpp"

namespace mdk {

nlohmann::json domain_spec_to_json(const DomainSpec& d);
DomainSpec domain_spec_from_json(const nlohmann::json& j,
                                 const std::string& where);

}  // namespace mdk
