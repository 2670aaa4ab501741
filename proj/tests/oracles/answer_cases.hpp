#pragma once

// Hand-written extraction cases: raw model output and the answer set a
// reader applying the protocol by hand would score.

#include <set>
#include <string>
#include <vector>

namespace oracle {

struct AnswerCase {
  std::string raw;
  std::set<std::string> expected;
};

inline const std::vector<AnswerCase>& answer_cases() {
  static const std::vector<AnswerCase> cases = {
      {"Answer: apple", {"apple"}},
      {"I think... Answer: goldfish, hammer", {"goldfish", "hammer"}},
      {"The answer is apple", {}},
      {"", {}},
      {"Answer:", {}},
      {"Answer: Apple", {"apple"}},
      {"Answer:   banana \n", {"banana"}},
      {"Answer: apple, apple", {"apple"}},
      {"Answer: apple\nAnswer: pear", {"pear"}},
      {"Question:\nx\nAnswer:\nfoo\n\nQuestion:\ny\nAnswer: bar, baz", {"bar", "baz"}},
      {"answer: apple", {}},
      {"ANSWER: apple", {}},
      {"Answer: a, , b", {"a", "b"}},
      {"Answer: great white shark", {"great white shark"}},
      {"Answer: Hammer,Goldfish", {"hammer", "goldfish"}},
      {"Final Answer: apple", {"apple"}},
      {"Answer: apple.", {"apple."}},
      {"Answer: 3, 4", {"3", "4"}},
      {"Answer: Dial Telephone, Toaster,\tSoap Dispenser", {"dial telephone", "toaster", "soap dispenser"}},
      {"Answer:apple", {"apple"}},
  };
  return cases;
}

}  // namespace oracle
