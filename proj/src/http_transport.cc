// Copyright 2026 The dxsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <httplib.h>

#include "dxsim/llm.h"

namespace dxsim {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos
                                            ? 0
                                            : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Transport make_http_transport() {
  return [](const HttpCall& call) {
    const SplitUrl parts = split_url(call.url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(call.timeout);
    client.set_read_timeout(call.timeout);
    client.set_write_timeout(call.timeout);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : call.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    HttpResponse out;
    auto result = client.Post(parts.path, headers, call.body, content_type);
    if (!result) {
      out.transport_error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  };
}

}  // namespace dxsim
