from flask import Blueprint

bp = Blueprint('sweeps', __name__, cli_group=None)

from app.sweeps import commands
