#ifndef CYBERDEF_CYBERDEF_HPP
#define CYBERDEF_CYBERDEF_HPP

#include "cyberdef/error.hpp"
#include "cyberdef/random.hpp"
#include "cyberdef/csv.hpp"
#include "cyberdef/scenario_spec.hpp"
#include "cyberdef/simcore.hpp"
#include "cyberdef/scenario.hpp"
#include "cyberdef/flows.hpp"
#include "cyberdef/evalmetrics.hpp"
#include "cyberdef/detect/preprocess.hpp"
#include "cyberdef/detect/classifiers.hpp"
#include "cyberdef/detect/model.hpp"
#include "cyberdef/detect/evaluate.hpp"
#include "cyberdef/alertserve.hpp"

#endif
