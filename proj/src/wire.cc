#include "llmguard/wire.h"

#include "llmguard/errors.h"

namespace llmguard {

Json span_to_json(const Span& span) {
  return {{"start", span.start}, {"end", span.end}, {"label", span.label}};
}

Json report_to_json(const DetectorReport& report) {
  Json spans = Json::array();
  for (const auto& span : report.spans) spans.push_back(span_to_json(span));
  return {{"detector_id", report.detector_id},
          {"phase", phase_name(report.phase)},
          {"score", report.score},
          {"flagged", report.flagged},
          {"threshold_used", report.threshold_used},
          {"spans", spans}};
}

Json reports_to_json(const std::vector<DetectorReport>& reports) {
  Json out = Json::array();
  for (const auto& report : reports) out.push_back(report_to_json(report));
  return out;
}

Json verdict_to_json(const Verdict& verdict, std::string_view request_id) {
  Json out = {{"request_id", request_id},
              {"decision", decision_name(verdict.decision)},
              {"delivered_text", verdict.delivered_text},
              {"reports", reports_to_json(verdict.reports)}};
  out["blocked_phase"] =
      verdict.blocked_phase ? Json(phase_name(*verdict.blocked_phase)) : Json(nullptr);
  return out;
}

DetectorReport report_from_json(const Json& value) {
  try {
    require_known_keys(value,
                       {"detector_id", "phase", "score", "flagged", "threshold_used", "spans"},
                       "report");
    DetectorReport report;
    report.detector_id = value.at("detector_id").get<std::string>();
    report.phase = parse_phase(value.at("phase").get<std::string>());
    report.score = value.at("score").get<double>();
    report.flagged = value.at("flagged").get<bool>();
    report.threshold_used = value.at("threshold_used").get<double>();
    for (const auto& span : value.at("spans")) {
      require_known_keys(span, {"start", "end", "label"}, "span");
      report.spans.push_back(Span{span.at("start").get<std::size_t>(),
                                  span.at("end").get<std::size_t>(),
                                  span.at("label").get<std::string>()});
    }
    return report;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
}

}  // namespace llmguard
