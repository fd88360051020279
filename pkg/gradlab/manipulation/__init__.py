# -*- coding: utf-8 -*-
from .alignedmtl import combine_alignedmtl
from .cagrad import combine_cagrad
from .graddrop import combine_graddrop
from .gradvac import combine_gradvac
from .mgda import combine_mgda
from .nash import combine_nash
from .pcgrad import combine_pcgrad
from .random_weighting import combine_random_weighting
