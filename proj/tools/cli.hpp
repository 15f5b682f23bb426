#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ember/registry.hpp"

namespace httplib {
class Server;
}

namespace ember::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// GET /catalog and POST /check, both answering application/json.
void install_catalog_routes(httplib::Server& server, const Registry& registry);

}  // namespace ember::cli
