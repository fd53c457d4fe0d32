from flask import Blueprint

bp = Blueprint('reproduce', __name__, cli_group=None)

from app.reproduce import commands
