#ifndef TREEKT_TREEKT_HPP
#define TREEKT_TREEKT_HPP

#include "treekt/concept_tree.hpp"
#include "treekt/em.hpp"
#include "treekt/errors.hpp"
#include "treekt/eval.hpp"
#include "treekt/inference.hpp"
#include "treekt/model.hpp"
#include "treekt/online.hpp"
#include "treekt/questions.hpp"
#include "treekt/records.hpp"
#include "treekt/simulate.hpp"

#endif  // TREEKT_TREEKT_HPP
