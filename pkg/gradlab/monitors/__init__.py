# -*- coding: utf-8 -*-
from .fd import fd_entropy
from .gds import gds
from .gms import gms
from .ranking import ranking_similarity
from .smoothing import moving_average, relative_to_baseline, trajectory_score
