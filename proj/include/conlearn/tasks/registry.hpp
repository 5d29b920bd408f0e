#pragma once

#include <memory>
#include <string>
#include <vector>

#include "conlearn/errors.hpp"
#include "conlearn/tasks/bio.hpp"
#include "conlearn/tasks/hierlabel.hpp"
#include "conlearn/tasks/pairrel.hpp"
#include "conlearn/tasks/ste.hpp"
#include "conlearn/tasks/task.hpp"

namespace conlearn::tasks {

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"ste", "hierlabel", "bio", "pairrel"};
  return names;
}

inline bool is_task(const std::string& name) {
  for (const auto& n : task_names())
    if (n == name) return true;
  return false;
}

inline std::unique_ptr<Task> make_task(const std::string& name, const TaskOptions& opt = {}) {
  if (name == "ste") return std::make_unique<SteTask>(opt);
  if (name == "hierlabel") return std::make_unique<HierLabelTask>(opt);
  if (name == "bio") return std::make_unique<BioTask>(opt);
  if (name == "pairrel") return std::make_unique<PairRelTask>(opt);
  throw ConfigError("unknown task '" + name + "'");
}

}  // namespace conlearn::tasks
