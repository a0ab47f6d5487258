#include "msmi/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "msmi/errors.hpp"

namespace msmi {
namespace {

nlohmann::ordered_json probabilities_to_json(const Eigen::VectorXd& probabilities) {
  nlohmann::ordered_json array = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    array.push_back(probabilities(i));
  }
  return array;
}

Eigen::VectorXd probabilities_from_json(const nlohmann::json& array) {
  Eigen::VectorXd probabilities(array.size());
  for (std::size_t i = 0; i < array.size(); ++i) {
    probabilities(static_cast<Eigen::Index>(i)) = array[i].get<double>();
  }
  return probabilities;
}

}  // namespace

std::string trace_to_json_line(const RefinementResult& result) {
  const RefinementTrace& trace = result.trace;
  nlohmann::ordered_json doc;
  doc["schema"] = "trace_v1";
  doc["doc_id"] = trace.doc_id;
  doc["original_text"] = trace.original_text;
  if (trace.true_label.has_value()) {
    doc["true_label"] = *trace.true_label;
  } else {
    doc["true_label"] = nullptr;
  }
  doc["original_prediction"] = trace.original_verdict.predicted;
  doc["original_probabilities"] = probabilities_to_json(trace.original_verdict.probabilities);
  doc["original_goal_score"] = trace.original_goal_score;
  doc["iterations"] = nlohmann::ordered_json::array();
  for (const IterationRecord& iteration : trace.iterations) {
    nlohmann::ordered_json entry;
    entry["candidate_text"] = iteration.candidate_text;
    entry["probabilities"] = probabilities_to_json(iteration.verdict.probabilities);
    entry["predicted"] = iteration.verdict.predicted;
    entry["goal_score"] = iteration.goal_score;
    entry["feedback_sent"] = iteration.feedback_sent;
    entry["generator_retries"] = iteration.generator_retries;
    doc["iterations"].push_back(std::move(entry));
  }
  doc["stop_reason"] = to_string(trace.stop_reason);
  doc["error_message"] = trace.error_message;
  doc["success"] = result.success;
  doc["output_text"] = result.output_text;
  doc["output_goal_score"] = result.output_goal_score;
  return doc.dump();
}

RefinementResult trace_from_json_line(const std::string& line, std::size_t line_no) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& error) {
    throw ParseError(std::string("invalid trace JSON: ") + error.what(), line_no);
  }
  if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string()) {
    throw DataError("trace line " + std::to_string(line_no) + " has no schema field");
  }
  if (doc["schema"].get<std::string>() != "trace_v1") {
    throw DataError("trace line " + std::to_string(line_no) + " has schema \"" +
                    doc["schema"].get<std::string>() + "\", expected \"trace_v1\"");
  }

  try {
    RefinementResult result;
    RefinementTrace& trace = result.trace;
    trace.doc_id = doc.at("doc_id").get<std::string>();
    trace.original_text = doc.at("original_text").get<std::string>();
    if (!doc.at("true_label").is_null()) {
      trace.true_label = doc["true_label"].get<int>();
    }
    trace.original_verdict.predicted = doc.at("original_prediction").get<int>();
    trace.original_verdict.probabilities =
        probabilities_from_json(doc.at("original_probabilities"));
    trace.original_goal_score = doc.at("original_goal_score").get<double>();
    for (const auto& entry : doc.at("iterations")) {
      IterationRecord iteration;
      iteration.candidate_text = entry.at("candidate_text").get<std::string>();
      iteration.verdict.probabilities = probabilities_from_json(entry.at("probabilities"));
      iteration.verdict.predicted = entry.at("predicted").get<int>();
      iteration.goal_score = entry.at("goal_score").get<double>();
      iteration.feedback_sent = entry.at("feedback_sent").get<bool>();
      iteration.generator_retries = entry.at("generator_retries").get<int>();
      trace.iterations.push_back(std::move(iteration));
    }
    trace.stop_reason = parse_stop_reason(doc.at("stop_reason").get<std::string>());
    trace.error_message = doc.at("error_message").get<std::string>();
    result.success = doc.at("success").get<bool>();
    result.output_text = doc.at("output_text").get<std::string>();
    result.output_goal_score = doc.at("output_goal_score").get<double>();
    return result;
  } catch (const nlohmann::json::exception& error) {
    throw DataError("trace line " + std::to_string(line_no) + " is malformed: " + error.what());
  }
}

void write_traces(const std::filesystem::path& path,
                  const std::vector<RefinementResult>& results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write trace file " + path.string());
  }
  for (const RefinementResult& result : results) {
    out << trace_to_json_line(result) << "\n";
  }
  if (!out) {
    throw IoError("failed while writing trace file " + path.string());
  }
}

std::vector<RefinementResult> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open trace file " + path.string());
  }
  std::vector<RefinementResult> results;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    results.push_back(trace_from_json_line(line, line_no));
  }
  return results;
}

}  // namespace msmi
