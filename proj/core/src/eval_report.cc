// Copyright 2026 The convfeat Authors.
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

#include <cstdio>
#include <string>

#include "convfeat/classifiers.h"
#include "json.hpp"

namespace convfeat {

namespace {

using Json = nlohmann::ordered_json;

Json ReportObject(const EvalReport& r) {
  Json j;
  j["protocol"] = r.protocol;
  j["classifier"] = r.classifier;
  j["dropout"] = r.dropout;
  j["per_class_train"] = r.per_class_train;
  j["seed"] = r.seed;
  j["classes"] = r.class_names;
  j["mean"] = r.mean;
  j["std"] = r.stddev;
  Json splits = Json::array();
  for (const SplitResult& s : r.splits) {
    Json js;
    js["accuracy"] = s.accuracy;
    js["chosen_reg"] = s.chosen_reg;
    js["confusion"] = s.confusion;
    splits.push_back(std::move(js));
  }
  j["splits"] = std::move(splits);
  return j;
}

template <typename T>
T Field(const Json& j, const char* key) {
  if (!j.contains(key)) {
    Fail(ErrorCode::kParseError, std::string("report is missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParseError, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string ReportToJson(const EvalReport& report) {
  return ReportObject(report).dump(2) + "\n";
}

EvalReport ReportFromJson(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kParseError, std::string("invalid report JSON: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kParseError, "report JSON must be an object");
  EvalReport r;
  r.protocol = Field<std::string>(j, "protocol");
  r.classifier = Field<std::string>(j, "classifier");
  r.dropout = Field<bool>(j, "dropout");
  r.per_class_train = Field<std::size_t>(j, "per_class_train");
  r.seed = Field<std::uint64_t>(j, "seed");
  r.class_names = Field<std::vector<std::string>>(j, "classes");
  r.mean = Field<double>(j, "mean");
  r.stddev = Field<double>(j, "std");
  const Json splits = Field<Json>(j, "splits");
  if (!splits.is_array()) Fail(ErrorCode::kParseError, "'splits' must be an array");
  for (const Json& js : splits) {
    SplitResult s;
    s.accuracy = Field<double>(js, "accuracy");
    s.chosen_reg = Field<double>(js, "chosen_reg");
    s.confusion = Field<std::vector<std::vector<std::size_t>>>(js, "confusion");
    r.splits.push_back(std::move(s));
  }
  return r;
}

std::string CurveToJson(const std::vector<EvalReport>& reports) {
  Json points = Json::array();
  for (const EvalReport& r : reports) {
    Json p;
    p["per_class_train"] = r.per_class_train;
    p["mean"] = r.mean;
    p["std"] = r.stddev;
    p["report"] = ReportObject(r);
    points.push_back(std::move(p));
  }
  Json j;
  j["learning_curve"] = std::move(points);
  return j.dump(2) + "\n";
}

std::string ConfusionToCsv(const EvalReport& report) {
  std::string out = "split,truth";
  for (const std::string& name : report.class_names) out += "," + name;
  out += "\n";
  for (std::size_t s = 0; s < report.splits.size(); ++s) {
    const auto& confusion = report.splits[s].confusion;
    for (std::size_t t = 0; t < confusion.size(); ++t) {
      out += std::to_string(s) + ",";
      out += t < report.class_names.size() ? report.class_names[t] : std::to_string(t);
      for (std::size_t count : confusion[t]) out += "," + std::to_string(count);
      out += "\n";
    }
  }
  return out;
}

}  // namespace convfeat
