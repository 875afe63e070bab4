//
// Copyright 2026 The ragsec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef RAGSEC_RAGSEC_HPP_
#define RAGSEC_RAGSEC_HPP_

#include "ragsec/attacks.hpp"
#include "ragsec/cli.hpp"
#include "ragsec/corpus.hpp"
#include "ragsec/defenses.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/error.hpp"
#include "ragsec/evaluation.hpp"
#include "ragsec/experiment.hpp"
#include "ragsec/generator.hpp"
#include "ragsec/random.hpp"
#include "ragsec/retriever.hpp"

#endif  // RAGSEC_RAGSEC_HPP_
