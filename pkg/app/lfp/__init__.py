from flask import Blueprint

bp = Blueprint('lfp', __name__, cli_group=None)

from app.lfp import commands
