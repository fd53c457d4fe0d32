from flask import Blueprint

bp = Blueprint('critical', __name__, cli_group=None)

from app.critical import commands
