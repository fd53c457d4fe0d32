from flask import Blueprint

bp = Blueprint('solver', __name__, cli_group=None)

from app.solver import commands
