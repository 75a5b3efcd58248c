import textwrap

def reflow(text, width):
    wrapped = textwrap.fill(text, width)
    return wrapped
