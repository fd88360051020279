# -*- coding: utf-8 -*-
from .problem import *
from .trainer import *
