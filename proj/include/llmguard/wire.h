#pragma once

// JSON forms of reports and verdicts, shared by the HTTP API and the CLI.
// Field-level schema: docs/http-api.md.

#include <string_view>
#include <vector>

#include "llmguard/config.h"
#include "llmguard/core.h"

namespace llmguard {

Json span_to_json(const Span& span);
Json report_to_json(const DetectorReport& report);
Json reports_to_json(const std::vector<DetectorReport>& reports);
Json verdict_to_json(const Verdict& verdict, std::string_view request_id);

// Inverse of report_to_json; throws ConfigError on schema violations.
DetectorReport report_from_json(const Json& value);

}  // namespace llmguard
