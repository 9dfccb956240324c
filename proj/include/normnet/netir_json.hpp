#pragma once

#include "normnet/netir.hpp"

#include "json.hpp"

#include <string>

namespace normnet {

nlohmann::json to_json(const Net& net);
Net net_from_json(const nlohmann::json& j);

void save_net(const Net& net, const std::string& path, const nlohmann::json& meta = nullptr);
Net load_net(const std::string& path);

}  // namespace normnet
